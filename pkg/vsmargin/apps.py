from django.apps import AppConfig


class VsMarginConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "vsmargin"
    verbose_name = "VS-loss and margin experiments"
