"""marl_lab: a desk-scale multi-agent RL laboratory for social-dilemma
gridworlds with inequity-aversion and impact-scaled reward shaping."""

__version__ = "0.1.0"
