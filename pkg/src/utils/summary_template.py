"""
Markdown run summaries rendered from Jinja2 templates
"""
from pathlib import Path
from typing import Union

from jinja2 import Environment, FileSystemLoader, StrictUndefined

TEMPLATES_DIR = Path(__file__).parent.parent.parent / 'templates'


def _environment() -> Environment:
    env = Environment(loader=FileSystemLoader(str(TEMPLATES_DIR)), undefined=StrictUndefined,
                      trim_blocks=True, lstrip_blocks=True)
    env.filters['num'] = lambda value, digits=6: "-" if value is None else f"{value:.{digits}g}"
    env.filters['flag'] = lambda value: "tie" if value is None else ("yes" if value else "NO")
    return env


def render_summary(template_name: str, **context) -> str:
    """
    Render a summary template from templates/.

    Raises:
        jinja2.TemplateNotFound: unknown template
        jinja2.UndefinedError: a variable used by the template is missing from context
    """
    return _environment().get_template(template_name).render(**context)


def write_summary(path: Union[str, Path], template_name: str, **context) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_summary(template_name, **context))
    return path
