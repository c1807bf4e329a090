"""Model fixtures shipped with the package."""
from pathlib import Path

FIXTURE_DIR = Path(__file__).parent
FIXTURES = ("lda", "regression", "polyreg", "catmix", "gmm", "naive_bayes", "hmm")


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.bn"
