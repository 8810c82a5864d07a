from django.conf import settings
from django.core.paginator import Paginator
from django.http import JsonResponse
from django.shortcuts import get_object_or_404

from .models import ExperimentRun


def api_run_list(request):
    """Recorded runs, newest first, paginated."""
    if request.method != 'GET':
        return JsonResponse({'error': 'Method not allowed'}, status=405)

    runs = ExperimentRun.objects.all()
    kind = request.GET.get('kind')
    if kind:
        runs = runs.filter(kind=kind)
    status = request.GET.get('status')
    if status:
        runs = runs.filter(status=status)

    paginator = Paginator(runs, settings.RUNS_PER_PAGE)
    page = paginator.get_page(request.GET.get('page'))
    return JsonResponse({
        'count': paginator.count,
        'page': page.number,
        'num_pages': paginator.num_pages,
        'results': [run.as_dict() for run in page],
    })


def api_run_detail(request, run_id):
    if request.method != 'GET':
        return JsonResponse({'error': 'Method not allowed'}, status=405)
    run = get_object_or_404(ExperimentRun, id=run_id)
    return JsonResponse(run.as_dict(with_manifest=True))
