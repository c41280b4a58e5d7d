class DarkTheme:
    """
    Dark report palette
    """
    color_palette = {
        "bg_color": "#2e2e2e",
        "plot_bg_color": "#2e2e2e",
        "grid_color": "#595656",
        "text_color": "#ffffff",
        "header_color": "#802c62",
        "header_text_color": "#ffffff",
        "allocentric_color": "#fd862b",
        "egocentric_color": "#4d98c4",
    }
