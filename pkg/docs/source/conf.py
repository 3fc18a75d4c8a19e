import importlib
import inspect
import os
import sys
from pathlib import Path
from unittest.mock import MagicMock, patch

import tomli
from jinja2.filters import FILTERS

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "src"))

with open(ROOT / "pyproject.toml", "rb") as f:
    pyproject = tomli.load(f)

# -- Project information -----------------------------------------------------

project = pyproject["project"]["name"]
author = pyproject["project"]["authors"][0]["name"]
copyright = f"2025, {author}"
release = pyproject["project"]["version"]

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.viewcode",
    "sphinx.ext.mathjax",
    "sphinx_copybutton",
    "sphinx_design",
    "myst_parser",
]

# SPHINX_QUICK_BUILD=true skips the API pages
quick_build = os.getenv("SPHINX_QUICK_BUILD", "false").lower() == "true"
if not quick_build:
    extensions += [
        "sphinx.ext.autodoc",
        "sphinx.ext.autosummary",
        "sphinx_codeautolink",
    ]

autodoc_default_options = {
    "members": True,
    "undoc-members": True,
    "show-inheritance": True,
}
autosummary_generate = True
autosummary_generate_overwrite = False
autodoc_member_order = "bysource"

templates_path = ["_templates"]
exclude_patterns = []
source_suffix = ".rst"
pygments_style = "sphinx"

# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_book_theme"
html_title = "hetcusum"
html_static_path = []

# strip environment markers such as "tomli; python_version < '3.11'"
autodoc_mock_imports = [dep.split(";")[0].split("[")[0].strip()
                        for dep in pyproject["project"]["dependencies"]]

myst_enable_extensions = ["deflist", "colon_fence"]
myst_heading_anchors = 3

# ========================================
#  Jinja2 filters for the autosummary templates
# ========================================
mocks = {name: MagicMock() for name in autodoc_mock_imports}


def _import(fullname):
    with patch.dict("sys.modules", mocks):
        try:
            return importlib.import_module(fullname)
        except ImportError:
            return None


def is_init(fullname):
    module = _import(fullname)
    return module is not None and Path(inspect.getfile(module)).name == "__init__.py"


def item_name(fullname):
    return fullname.rsplit(".", 1)[-1]


def _lazy_table(fullname, attribute):
    module = _import(fullname)
    table = getattr(module, attribute, {}) if module is not None else {}
    return [f"{origin}.{name}" for origin, names in table.items() for name in names]


def get_submodules(fullname):
    return _lazy_table(fullname, "all_modules_by_origin")


def get_imports(fullname):
    return _lazy_table(fullname, "all_imports_by_origin")


def doc_summary_module(fullname):
    module = _import(fullname)
    doc = inspect.getdoc(module) if module is not None else None
    return doc.strip().splitlines()[0] if doc else ""


def split_by_parent(fullnames):
    groups = {}
    for fullname in fullnames:
        parent, name = fullname.rsplit(".", 1)
        groups.setdefault(parent, []).append(name)
    return list(groups.items())


FILTERS["is_init"] = is_init
FILTERS["item_name"] = item_name
FILTERS["get_submodules"] = get_submodules
FILTERS["get_imports"] = get_imports
FILTERS["doc_summary_module"] = doc_summary_module
FILTERS["split_by_parent"] = split_by_parent
