"""Published reference values for the simulation tables, used as comparison targets.

Estimation entries are means over replications. Rate entries are rejection
frequencies over subsamples.
"""

ESTIMATION_COLUMNS = ("A_sen", "A_spc", "A_error", "B_rank", "B_error", "C_sen", "C_spc", "C_error")

TABLE2 = {
    "A.1": (0.98, 0.99, 0.34, 5.2, 0.11, 1.00, 0.97, 0.15),
    "A.2": (0.97, 0.99, 0.38, 5.2, 0.31, 0.97, 0.97, 0.28),
    "A.3": (0.99, 0.96, 0.87, 5.8, 0.54, 0.98, 0.92, 0.28),
    "A.4": (0.96, 0.99, 0.36, 5.2, 0.32, 0.95, 0.98, 0.37),
    "B.1": (0.97, 0.99, 0.37, 11.4, 0.15, 1.00, 0.99, 0.09),
    "B.2": (0.98, 0.99, 0.38, 21.2, 0.12, 1.00, 0.99, 0.08),
    "C.1": (1.00, 0.97, 0.25, 5.6, 0.23, 1.00, 0.92, 0.11),
    "C.2": (0.99, 0.95, 0.45, 5.0, 0.31, 1.00, 0.92, 0.04),
    "C.3": (1.00, 0.96, 0.18, 6.7, 0.19, 1.00, 0.87, 0.14),
    "C.3'": (1.00, 0.99, 0.13, 5.2, 0.23, 1.00, 0.90, 0.06),
}

TABLE3 = {
    ("A.2", "student-t"): (0.99, 0.95, 0.60, 6.0, 0.24, 0.96, 0.96, 0.27),
    ("A.2", "elliptical"): (0.97, 0.99, 0.36, 5.1, 0.34, 1.00, 0.85, 0.15),
    ("B.1", "student-t"): (0.98, 0.95, 0.61, 10.4, 0.34, 0.99, 0.95, 0.25),
    ("B.1", "elliptical"): (0.95, 0.99, 0.37, 10.1, 0.40, 1.00, 0.90, 0.09),
    ("C.1", "student-t"): (0.99, 0.92, 0.22, 6.0, 0.09, 1.00, 0.93, 0.10),
    ("C.1", "elliptical"): (1.00, 0.90, 0.32, 5.2, 0.13, 1.00, 0.92, 0.07),
    ("C.2", "student-t"): (0.99, 0.95, 0.37, 5.1, 0.22, 1.00, 0.89, 0.10),
    ("C.2", "elliptical"): (0.88, 0.97, 0.43, 5.1, 0.40, 1.00, 0.86, 0.10),
}

# one-step relative forecast error for (x, z)
TABLE4 = {
    "A.1": (0.89, 0.23),
    "C.1": (0.62, 0.10),
    "C.2": (0.93, 0.17),
    "C.3": (0.68, 0.10),
    "B.1": (0.92, 0.14),
    "B.2": (0.94, 0.14),
    "A.2": (0.87, 0.24),
    "A.3": (0.96, 0.44),
    "A.4": (0.89, 0.274),
}

# two-step versus iterated estimates on A.1 with low-rank B
COMPARISON_COLUMNS = ("A_sen", "A_spc", "A_error", "B_error", "B_rank", "C_sen", "C_spc", "C_error")
TABLE5 = {
    "twostep": (0.97, 0.95, 0.52, 0.27, 5, 1.00, 0.98, 0.12),
    "ml": (0.97, 0.97, 0.36, 0.24, 5, 1.00, 0.95, 0.05),
}
TABLE6_A_ERROR_BY_ITERATION = (0.521, 0.408, 0.376, 0.360, 0.359, 0.359)
TABLE7_C_ERROR_BY_ITERATION = (0.119, 0.050, 0.049, 0.049, 0.048, 0.048,
                               0.048, 0.047, 0.047, 0.047, 0.047)

# (rho_C, p1, p2, T) -> (type I at 0.01, 0.05, 0.1, power of rank-1 alternative at 0.01)
TABLE8 = {
    (0.5, 20, 20, 500): (0.028, 0.123, 0.227, 1.0),
    (0.5, 20, 20, 1000): (0.015, 0.073, 0.137, 1.0),
    (0.5, 20, 20, 2000): (0.011, 0.059, 0.118, 1.0),
    (0.5, 50, 20, 500): (0.070, 0.228, 0.355, 1.0),
    (0.5, 50, 20, 1000): (0.026, 0.125, 0.226, 1.0),
    (0.5, 50, 20, 2000): (0.013, 0.094, 0.163, 1.0),
    (0.5, 20, 50, 500): (0.484, 0.751, 0.857, 1.0),
    (0.5, 20, 50, 1000): (0.089, 0.246, 0.375, 1.0),
    (0.5, 20, 50, 2000): (0.020, 0.088, 0.164, 1.0),
    (0.5, 100, 50, 500): (0.997, 0.999, 1.0, 1.0),
    (0.5, 100, 50, 1000): (0.608, 0.828, 0.908, 1.0),
    (0.5, 100, 50, 2000): (0.166, 0.374, 0.511, 1.0),
    (0.8, 20, 50, 500): (0.533, 0.789, 0.880, 1.0),
    (0.8, 20, 50, 1000): (0.130, 0.306, 0.452, 1.0),
    (0.8, 20, 50, 2000): (0.045, 0.145, 0.252, 1.0),
    (0.8, 50, 20, 500): (0.083, 0.250, 0.382, 1.0),
    (0.8, 50, 20, 1000): (0.039, 0.133, 0.234, 1.0),
    (0.8, 50, 20, 2000): (0.019, 0.096, 0.174, 1.0),
}
# rank(B) = 5: type I of r <= 5 at the three levels, power of r <= 4 at 0.01
TABLE8_RANK5 = {
    (0.5, 20, 50, 500): (0.092, 0.274, 0.400, 1.0),
    (0.5, 20, 50, 1000): (0.034, 0.140, 0.236, 1.0),
    (0.5, 20, 50, 2000): (0.022, 0.096, 0.178, 1.0),
    (0.5, 50, 20, 500): (0.454, 0.722, 0.829, 1.0),
    (0.5, 50, 20, 1000): (0.126, 0.313, 0.452, 1.0),
    (0.5, 50, 20, 2000): (0.062, 0.184, 0.284, 1.0),
}

# (rho_C, p1, p2) -> ({T: type I}, {T: power})
_T9 = (200, 500, 1000, 2000)
TABLE9 = {
    (0.5, 20, 20): (dict(zip(_T9, (0.244, 0.097, 0.074, 0.055))), dict(zip(_T9, (1, 1, 1, 1)))),
    (0.5, 50, 20): (dict(zip(_T9, (0.393, 0.131, 0.108, 0.074))), dict(zip(_T9, (1, 1, 1, 1)))),
    (0.5, 20, 50): (dict(zip(_T9, (0.996, 0.351, 0.153, 0.093))), dict(zip(_T9, (1, 1, 1, 1)))),
    (0.5, 100, 50): (dict(zip(_T9, (1.000, 0.963, 0.270, 0.115))), dict(zip(_T9, (1, 1, 1, 1)))),
    (0.8, 50, 20): (dict(zip(_T9, (0.402, 0.158, 0.112, 0.075))),
                    dict(zip(_T9, (0.829, 0.996, 1, 1)))),
    (0.8, 20, 50): (dict(zip(_T9, (0.999, 0.430, 0.166, 0.111))), dict(zip(_T9, (1, 1, 1, 1)))),
}
