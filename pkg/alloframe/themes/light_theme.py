class LightTheme:
    """
    Light report palette
    """
    color_palette = {
        "bg_color": "#ffffff",
        "plot_bg_color": "#ffffff",
        "grid_color": "#e6e6e6",
        "text_color": "#2e2e2e",
        "header_color": "#5c285b",
        "header_text_color": "#ffffff",
        "allocentric_color": "#c43d5c",
        "egocentric_color": "#3366d6",
    }
