# -*- coding: utf-8 -*-
#
# termsv documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath('../src'))
sys.path.insert(0, os.path.abspath('.'))

from termsv import __version__ as termsv_version

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'ext_argparse']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'termsv'
copyright = '2024, termsv contributors'

version = termsv_version
release = termsv_version

exclude_patterns = ['_build']

autodoc_member_order = 'bysource'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'alabaster'
html_theme_options = {
    "description": (
        "Dynamic Nelson-Siegel and Svensson models of futures term "
        "structures with Wishart stochastic volatility."
    ),
}
html_domain_indices = False
html_show_sourcelink = False
htmlhelp_basename = 'termsvdoc'

# -- Options for manual page output --------------------------------------------

man_pages = [
    ('cli', 'termsv', 'fits term structure models with Wishart stochastic '
     'volatility to futures price panels', ['termsv contributors'], 1)
]
