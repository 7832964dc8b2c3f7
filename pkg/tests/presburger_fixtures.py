"""Presburger summation fixtures: (set json, a, b)."""

V1, V2, V3 = ["z"], ["z1", "z2"], ["z1", "z2", "z3"]

FIXTURES = [
    ({"variables": V1, "constraints": ["z >= 1"]}, [1], [-1]),
    ({"variables": V1, "constraints": ["z >= 0", "z = 0 mod 2"]}, [1], [-1]),
    ({"variables": V2, "constraints": ["z1 >= 1", "z2 >= 1"]}, [1, 1], [-1, -1]),
    ({"variables": V1, "constraints": ["z >= 0"]}, [2], [-1]),
    ({"variables": V1, "constraints": ["z >= 3", "z <= 10"]}, [1], [1]),
    ({"variables": V2, "constraints": ["z1 >= 0", "z2 >= z1"]}, [1, 1], [0, -1]),
    ({"variables": V2, "constraints": ["z1 >= 0", "z2 >= 0", "z1 + z2 <= 7"]}, [1, 2], [0, 1]),
    ({"variables": V1, "constraints": ["z >= 0", "z = 1 mod 3"]}, [1], [-2]),
    ({"variables": V1, "clauses": [["z >= 5"], ["z >= 0", "z = 0 mod 2"]]}, [1], [-1]),
    ({"variables": V2, "constraints": ["z1 >= 1", "z2 >= 1", "2*z1 >= z2"]}, [1, 1], [-1, -2]),
    ({"variables": V3, "constraints": ["z1 >= 0", "z2 >= 0", "z3 >= 0"]}, [1, 1, 1], [-1, -1, -1]),
    ({"variables": V2, "constraints": ["z1 >= 0", "z2 >= 0", "z1 - z2 = 0 mod 2"]}, [1, 2], [-1, -1]),
    ({"variables": V2, "constraints": ["z1 >= 0", "z2 >= 0", "z1 <= 2*z2", "z2 <= 2*z1"]}, [1, 1], [-1, -1]),
    ({"variables": V2, "constraints": ["z1 >= 1", "z2 >= z1 + 2", "z2 = z1 mod 3"]}, [0, 1], [-1, -1]),
    ({"variables": V2, "constraints": ["z1 >= 0", "z2 = 2*z1 + 1"]}, [1, 1], [-1, 0]),
    ({"variables": V2, "clauses": [["z1 >= 0", "z2 >= 0", "z1 >= z2"], ["z1 >= 0", "z2 >= 0", "z2 >= z1"]]},
     [1, 1], [-1, -1]),
    ({"variables": V1, "constraints": ["z >= 0", "z <= 100"]}, [1], [-1]),
    ({"variables": V2, "constraints": ["z1 >= 0", "z2 >= 0", "z1 + z2 = 1 mod 2", "z1 <= 4"]}, [1, 2], [-2, -1]),
    ({"variables": V3, "constraints": ["z1 >= 1", "z2 >= z1", "z3 >= z2"]}, [1, 1, 1], [-1, -1, -2]),
    ({"variables": V2, "constraints": ["z1 >= 2", "z2 >= 0", "z1 + 3*z2 >= 4"]}, [2, 3], [-1, -3]),
]

DEGREE = 26  # coefficients 0..25


def box(nvars: int) -> list[tuple[int, int]]:
    return [(-2, DEGREE + 2)] * nvars
