"""
__init__.py for views package (SVG charts and console tables)
"""
