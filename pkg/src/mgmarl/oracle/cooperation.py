def cooperation_probability(eps):
    """Chance of the symmetric cooperative trajectory in the 4x3 two-agent grid.

    Agents act greedily with probability ``1 - eps`` and uniformly over four
    moves otherwise. Returns ``(probability at eps, probability under a purely
    uniform policy)``; the latter is the same closed form at ``eps = 1``.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps}")

    def closed_form(e):
        return 2.0 * e**2 * ((1.0 - e) + e / 4.0) ** 8

    return closed_form(eps), closed_form(1.0)
