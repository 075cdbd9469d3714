"""
__init__.py for utils package (version, timestamps, curve rounds, CLI option parsing)
"""
