# Sphinx configuration for the vemeig API documentation.

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

from vemeig import __version__  # noqa: E402

project = 'vemeig'
copyright = '2026, vemeig developers'
author = 'vemeig developers'
release = __version__
version = '.'.join(__version__.split('.')[:2])

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

autodoc_member_order = 'bysource'
autodoc_typehints = 'description'
autodoc_default_options = {'members': True, 'undoc-members': False, 'show-inheritance': True}

exclude_patterns = []

html_theme = 'alabaster'
