from .sweep import Command as SweepCommand


class Command(SweepCommand):
    help = 'Empirical separability against gamma_star; writes phase_transition.csv and manifest.json.'
    kind = 'phase_transition'
