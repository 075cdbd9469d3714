"""
__init__.py for cogs package (one CLI command per module)
"""
