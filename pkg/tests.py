"""
Tests module for sphere-superres package.

    python tests.py
    SPHERE_SUPERRES_SLOW_TESTS=1 python tests.py    # also the full sweeps

"""
import os
import logging
import unittest

import django
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "tests.settings")
from django.conf import settings
django.setup()


logger = logging.getLogger(__name__)

app = 'tests'


from sphere_superres.conf import DEFAULTS, settings as package_settings  # pylint: disable=E0402
from tests.test_sphere_core import *  # noqa: F401,F403 pylint: disable=E0402
from tests.test_harmonics import *  # noqa: F401,F403 pylint: disable=E0402
from tests.test_operators import *  # noqa: F401,F403 pylint: disable=E0402
from tests.test_signal_gen import *  # noqa: F401,F403 pylint: disable=E0402
from tests.test_solver import *  # noqa: F401,F403 pylint: disable=E0402
from tests.test_csvio import *  # noqa: F401,F403 pylint: disable=E0402
from tests.test_experiments import *  # noqa: F401,F403 pylint: disable=E0402
from tests.test_cli import *  # noqa: F401,F403 pylint: disable=E0402


class AllTests(unittest.TestCase):
    def test_configuration(self):
        """
        Test configuration defaults.
        :return: nothing as is a test case.

        """
        self.assertEqual(settings.DEBUG, True)
        self.assertEqual(settings.UNIT_TESTING, True)
        for name in DEFAULTS:
            self.assertNotEqual(getattr(package_settings, name), None)

    def test_settings_override(self):
        """
        Values set in the settings module win over the package defaults,
        names left out fall back on them.

        :return: nothing as is a test case.

        """
        self.assertEqual(package_settings.SPHERE_SUPERRES_WORKERS, 1)
        self.assertEqual(package_settings.SPHERE_SUPERRES_BACKEND, DEFAULTS['SPHERE_SUPERRES_BACKEND'])
        self.assertFalse(hasattr(settings, 'SPHERE_SUPERRES_BACKEND'))


if __name__ == "__main__":
    unittest.main()
