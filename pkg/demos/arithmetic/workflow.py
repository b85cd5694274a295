"""Workflow functions for the arithmetic demo: combine the product and
quotient of two numbers, then square the sum."""


def get_prod_and_div(x: float = 1.0, y: float = 1.0) -> dict[str, float]:
    return {"prod": x * y, "div": x / y}


def get_sum(x, y):
    return x + y


def get_square(x):
    return x**2
