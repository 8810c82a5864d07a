from .sweep import Command as SweepCommand


class Command(SweepCommand):
    help = 'Margin ratio delta_0 at which the predicted DEO of GS-SVM vanishes, per gamma.'
    kind = 'deo_zero'
