"""Text prompts to template labels.

Two prompt formats are understood: the simple ``"a <object>"`` and the
complex ``"a 3D <object> model type <Y>"``. The type token becomes a variant
number that offsets the generation seed.
"""
import re
import zlib
from dataclasses import dataclass

from ..geometry.synth import TEMPLATES

SIMPLE = "simple"
COMPLEX = "complex"

OBJECT_TEMPLATES = {
    "laptop": "laptop_lid",
    "notebook": "laptop_lid",
    "cabinet": "cabinet_door",
    "door": "cabinet_door",
    "refrigerator": "cabinet_door",
    "fridge": "cabinet_door",
    "oven": "cabinet_door",
    "microwave": "cabinet_door",
    "safe": "cabinet_door",
    "washer": "cabinet_door",
    "drawer": "drawer_box",
    "dresser": "drawer_box",
    "storage": "drawer_box",
    "table": "drawer_box",
    "faucet": "faucet_arm",
    "tap": "faucet_arm",
}

_COMPLEX_RE = re.compile(r"^an?\s+3d\s+(?P<object>.+?)\s+model\s+type\s+(?P<type>\S+)$", re.IGNORECASE)
_SIMPLE_RE = re.compile(r"^(?:an?\s+)?(?P<object>.+?)$", re.IGNORECASE)


@dataclass(frozen=True)
class Prompt:
    text: str
    label: str
    variant: int = 0
    regime: str = SIMPLE


def _variant(token: str) -> int:
    return int(token) if token.isdigit() else zlib.crc32(token.lower().encode("utf-8"))


def _template_for(phrase: str) -> str:
    words = re.findall(r"[a-z_]+", phrase.lower())
    for word in reversed(words):
        if word in TEMPLATES:
            return word
        singular = word[:-1] if word.endswith("s") else word
        for candidate in (word, singular):
            if candidate in OBJECT_TEMPLATES:
                return OBJECT_TEMPLATES[candidate]
    raise KeyError(f"no object template matches '{phrase}'; known objects: "
                   f"{', '.join(sorted(OBJECT_TEMPLATES))}")


def parse_prompt(text: str) -> Prompt:
    """Template label, variant and regime for a label or a prompt; KeyError if nothing matches."""
    text = " ".join(text.strip().split())
    if not text:
        raise KeyError("empty prompt")
    if text in TEMPLATES:
        return Prompt(text, text)
    m = _COMPLEX_RE.match(text)
    if m:
        return Prompt(text, _template_for(m.group("object")), _variant(m.group("type")), COMPLEX)
    m = _SIMPLE_RE.match(text)
    return Prompt(text, _template_for(m.group("object")))
