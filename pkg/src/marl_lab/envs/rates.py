"""Resource-dynamics rate functions, kept pure for direct testing."""


def cleanup_spawn_rate(waste_density, depletion_threshold=0.4, max_rate=0.05):
    """Apple spawn probability per empty orchard cell, linear in how far the
    river's waste density sits below the depletion threshold; zero at or
    above it, max_rate for a clean river."""
    if not 0.0 <= waste_density <= 1.0:
        raise ValueError(f"waste density {waste_density} outside [0, 1]")
    rate = max_rate * max(0.0, depletion_threshold - waste_density) / depletion_threshold
    return min(max(rate, 0.0), max_rate)


def harvest_regrowth_prob(neighbor_apples, low=0.01, mid=0.05, high=0.1):
    """Apple regrowth probability from the apple count in the L1-radius-2
    neighborhood: none nearby means permanent depletion."""
    if neighbor_apples < 0:
        raise ValueError("neighbor count must be nonnegative")
    if neighbor_apples == 0:
        return 0.0
    if neighbor_apples <= 2:
        return low
    if neighbor_apples <= 4:
        return mid
    return high
