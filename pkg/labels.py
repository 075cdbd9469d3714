"""
Display labels for methods, metrics and presets.
Loads labels from labels.json for easy editing.
"""

import json
from pathlib import Path
import logging

logger = logging.getLogger(__name__)

# Load labels from JSON file
LABELS_FILE = Path(__file__).parent / "labels.json"

try:
    with open(LABELS_FILE, 'r', encoding='utf-8') as f:
        LABELS = json.load(f)
    logger.info(f"✅ Loaded {sum(len(v) for v in LABELS.values())} label(s) from {LABELS_FILE}")
except FileNotFoundError:
    # Fallback to raw keys if JSON file is missing
    logger.warning(f"⚠️ {LABELS_FILE} not found, using raw keys as labels")
    LABELS = {"methods": {}, "metrics": {}, "presets": {}}
except json.JSONDecodeError as e:
    logger.error(f"❌ Error loading {LABELS_FILE}: {e}")
    LABELS = {"methods": {}, "metrics": {}, "presets": {}}


def get_label(section: str, key: str) -> str:
    """
    Get the display label for a key.

    Method labels such as "opt_lasso(0.8,0.6)" resolve their base name and
    keep the tuning suffix.

    Args:
        section: "methods", "metrics" or "presets"
        key: Raw key

    Returns:
        Display label, or the key itself when none is defined
    """
    table = LABELS.get(section, {})
    if key in table:
        return table[key]
    base, sep, rest = key.partition("(")
    if sep and base in table:
        return f"{table[base]} ({rest}"
    return key
