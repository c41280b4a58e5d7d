import re
from alloframe.experts.base import ReasonerAnswer
from alloframe.errors import ExtractionError

BOXED_PATTERN = re.compile(r'\\?boxed\{([^{}]*)\}')
THINK_PATTERN = re.compile(r'(?:<think>|⟨think⟩)(.*?)(?:</think>|⟨/think⟩)', re.DOTALL)


def extract_answer(raw_text: str) -> ReasonerAnswer:
    """
    Parses a reasoner reply.

    The answer is the content of the LAST boxed span, whitespace-stripped; the chain is the
    content of the first think span, if any.

    Raises:
        ExtractionError: If there is no boxed span or it is empty.
    """
    raw_text = raw_text or ''
    matches = BOXED_PATTERN.findall(raw_text)
    if not matches:
        raise ExtractionError("Reasoner reply contains no boxed answer")
    extracted = matches[-1].strip()
    if not extracted:
        raise ExtractionError("Reasoner reply has an empty boxed answer")
    think = THINK_PATTERN.search(raw_text)
    chain = think.group(1).strip() if think else None
    return ReasonerAnswer(raw_text=raw_text, extracted=extracted, chain=chain)
