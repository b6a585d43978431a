# splitfeas documentation build configuration file.
import os
import sys

sys.path.insert(0, os.path.abspath("../.."))
sys.path.insert(0, os.path.abspath("../../splitfeas"))

extensions = ["sphinx.ext.autodoc", "sphinx.ext.doctest"]

templates_path = ["_templates"]

source_suffix = ".rst"

master_doc = "index"

project = u"splitfeas"
copyright = u"2026, splitfeas developers"

version = "0.1"
release = "0.1.0"

exclude_patterns = []

pygments_style = "sphinx"

html_theme = "default"

html_static_path = ["_static"]

htmlhelp_basename = "splitfeasdoc"

latex_documents = [
    ("index", "splitfeas.tex", u"splitfeas Documentation", u"splitfeas developers", "manual")
]

man_pages = [("index", "splitfeas", u"splitfeas Documentation", [u"splitfeas developers"], 1)]
