import html
import logging
import pandas as pd
import plotly.graph_objects as go
from alloframe.enums import ALLOCENTRIC_FAMILIES, Theme
from ..themes.light_theme import LightTheme
from ..themes.dark_theme import DarkTheme

logger = logging.getLogger(__name__)

THEMES = {Theme.LIGHT: LightTheme, Theme.DARK: DarkTheme}


class HTMLReportGenerator:
    """
    Builds a self-contained HTML page from headings, text, tables and plotly figures.
    """

    def __init__(self, title="Evaluation Report", theme=LightTheme):
        """
        Parameters:
            title (str): The title of the report.
            theme (object): Theme class with a color_palette. Defaults to LightTheme.
        """
        self.title = title
        self.theme = theme.color_palette if theme else LightTheme.color_palette
        self.sections = []
        self._plotly_loaded = False

    def add_heading(self, heading, level=1):
        self.sections.append(f"<h{level} style='color: {self.theme['text_color']};'>{html.escape(heading)}</h{level}>")

    def add_text(self, text):
        self.sections.append(f"<p style='color: {self.theme['text_color']};'>{html.escape(text)}</p>")

    def add_table_from_dataframe(self, df: pd.DataFrame, title=None):
        """
        Adds a table to the report.

        Parameters:
            df (pd.DataFrame): The dataframe to convert to an HTML table.
            title (str): Optional title for the table.
        """
        if title:
            self.add_heading(title, level=2)
        self.sections.append(df.to_html(index=False, classes='table', border=0, float_format=lambda v: f"{v:.3f}"))

    def add_figure(self, fig: go.Figure, title=None):
        """
        Embeds an interactive plotly figure. The plotly script is included once per report.

        Parameters:
            fig (go.Figure): The figure to embed.
            title (str): Optional title for the figure.
        """
        if title:
            self.add_heading(title, level=2)
        self.sections.append(fig.to_html(full_html=False, include_plotlyjs=not self._plotly_loaded))
        self._plotly_loaded = True

    def render(self) -> str:
        return f"""<!DOCTYPE html>
<html lang="en">
<head>
    <meta charset="UTF-8">
    <meta name="viewport" content="width=device-width, initial-scale=1.0">
    <title>{html.escape(self.title)}</title>
    <style>
        body {{
            font-family: Arial, sans-serif;
            margin: 20px;
            background-color: {self.theme['bg_color']};
            color: {self.theme['text_color']};
        }}
        .container {{
            max-width: 960px;
            margin: auto;
            padding: 20px;
        }}
        .table {{
            width: 100%;
            border-collapse: collapse;
            margin-bottom: 20px;
            color: {self.theme['text_color']};
        }}
        .table th, .table td {{
            border: 1px solid {self.theme['grid_color']};
            padding: 8px;
        }}
        .table th {{
            text-align: left;
            background-color: {self.theme['header_color']};
            color: {self.theme['header_text_color']};
        }}
    </style>
</head>
<body>
    <div class="container">
        <h1 style='color: {self.theme['text_color']};'>{html.escape(self.title)}</h1>
        {"".join(self.sections)}
    </div>
</body>
</html>
"""

    def generate_report(self, filepath):
        """
        Writes the report to filepath.
        """
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(self.render())
        logger.info("Wrote HTML report to %s", filepath)


def family_accuracy_figure(families: pd.DataFrame, theme=LightTheme) -> go.Figure:
    """
    Bar chart of per-family accuracy, allocentric families in one color and egocentric in another.
    """
    palette = theme.color_palette
    allocentric = {family.value for family in ALLOCENTRIC_FAMILIES}
    colors = [palette['allocentric_color'] if family in allocentric else palette['egocentric_color']
              for family in families['family']]
    fig = go.Figure(go.Bar(x=families['family'], y=families['accuracy'], marker_color=colors,
                           text=[f"{v:.2f}" for v in families['accuracy']], textposition='outside'))
    fig.update_layout(
        paper_bgcolor=palette['bg_color'],
        plot_bgcolor=palette['plot_bg_color'],
        font=dict(color=palette['text_color']),
        yaxis=dict(range=[0, 1.05], gridcolor=palette['grid_color'], title='accuracy'),
        xaxis=dict(title='family'),
        margin=dict(l=40, r=20, t=30, b=40),
    )
    return fig


def build_eval_report(report, filepath: str, theme: Theme = Theme.LIGHT):
    """
    Renders an EvalReport as HTML: summary averages, the per-family table and chart,
    and the failed questions with their stage.

    Parameters:
        report (EvalReport): The evaluation to render.
        filepath (str): Output HTML path.
        theme (Theme): Light or dark palette.
    """
    theme_class = THEMES[Theme(theme)]
    generator = HTMLReportGenerator(title="Spatial Reasoning Evaluation", theme=theme_class)
    summary = report.to_dict()

    def fmt(value):
        return 'n/a' if value is None else f"{value:.3f}"

    generator.add_text(f"Questions: {summary['overall']['n']}, overall accuracy: {fmt(summary['overall']['accuracy'])}")
    generator.add_text(f"Allocentric average: {fmt(summary['allocentric_avg'])}, "
                       f"egocentric average: {fmt(summary['egocentric_avg'])}")
    if not report.families.empty:
        generator.add_table_from_dataframe(report.families, title="Accuracy per family")
        generator.add_figure(family_accuracy_figure(report.families, theme_class))
    failures = [record.to_dict() for record in report.records if record.error]
    if failures:
        df = pd.DataFrame(failures)[['id', 'family', 'stage', 'error']]
        generator.add_table_from_dataframe(df, title="Failed questions")
    generator.generate_report(filepath)
