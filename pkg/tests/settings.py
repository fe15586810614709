import os

DEBUG = True
UNIT_TESTING = True

# Long sweep checks (regularity table, noise sweep, 100-instance feasibility).
RUN_SLOW_TESTS = os.environ.get('SPHERE_SUPERRES_SLOW_TESTS', '') not in ('', '0', 'false', 'False')

SPHERE_SUPERRES_ATTEMPTS_PER_POINT = 10000
SPHERE_SUPERRES_MAX_ITERS = 200000
SPHERE_SUPERRES_WORKERS = 1

INSTALLED_APPS = []
