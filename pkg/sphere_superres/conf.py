"""
Settings for sphere-superres.

Values are read from Django's settings object, the same way a Django project
configures a reusable app. Point DJANGO_SETTINGS_MODULE at your own module to
override anything below:

    # my_project/settings.py
    DEBUG = True
    SPHERE_SUPERRES_FEAS_TOL = 1e-7
    SPHERE_SUPERRES_WORKERS = 4

When no settings module is configured we call settings.configure() with
DEBUG=False and fall back to DEFAULTS for every SPHERE_SUPERRES_* name.
"""
import math
import os
import typing

from django.conf import settings as django_settings


__all__ = [
    'DEFAULTS',
    'settings',
]


DEFAULTS = {
    # Separation constant of the minimal separation condition.
    'SPHERE_SUPERRES_NU': 5 * math.pi / 2,
    'SPHERE_SUPERRES_FEAS_TOL': 1e-6,
    'SPHERE_SUPERRES_OBJ_TOL': 1e-8,
    'SPHERE_SUPERRES_STAGNATION_WINDOW': 100,
    'SPHERE_SUPERRES_MAX_ITERS': 200000,
    'SPHERE_SUPERRES_STEP_RATIO': 1.0,
    'SPHERE_SUPERRES_POWER_ITERS': 500,
    # Rejection-sampling attempts per requested point in a cell.
    'SPHERE_SUPERRES_ATTEMPTS_PER_POINT': 10000,
    'SPHERE_SUPERRES_TRACE_EVERY': 100,
    'SPHERE_SUPERRES_BACKEND': 'pdhg',
    # How the solver applies P_N: 'kernel', 'coefficients' or 'factored'.
    'SPHERE_SUPERRES_OPERATOR': 'factored',
    'SPHERE_SUPERRES_WORKERS': 1,
}


class LazySettings:
    """
    Thin proxy over django.conf.settings that configures Django on first
    use and supplies package defaults for names the project did not set.
    """

    def _setup(self) -> None:
        if django_settings.configured:
            return
        if os.environ.get('DJANGO_SETTINGS_MODULE'):
            return
        django_settings.configure(DEBUG=False)

    def __getattr__(self, name: str) -> typing.Any:
        self._setup()
        if name in DEFAULTS:
            return getattr(django_settings, name, DEFAULTS[name])
        return getattr(django_settings, name)


settings = LazySettings()
