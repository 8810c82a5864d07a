from django.urls import path

from . import views

app_name = 'vsmargin'

urlpatterns = [
    # Read-only run registry
    path('api/runs/', views.api_run_list, name='api_run_list'),
    path('api/runs/<uuid:run_id>/', views.api_run_detail, name='api_run_detail'),
]
