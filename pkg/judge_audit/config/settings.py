import math
import os

from dotenv import load_dotenv

load_dotenv()

# Logging
LOG_LEVEL = os.getenv("JUDGE_AUDIT_LOG_LEVEL", "INFO")

# Judge endpoint defaults (the key itself is only ever read from the named variable)
API_KEY_ENV = os.getenv("JUDGE_AUDIT_API_KEY_ENV", "OPENAI_API_KEY")
JUDGE_BASE_URL = os.getenv("JUDGE_AUDIT_BASE_URL", "https://api.openai.com/v1")
JUDGE_MODEL = os.getenv("JUDGE_AUDIT_JUDGE_MODEL", "gpt-4o-mini")
JUDGE_CONCURRENCY = 4
JUDGE_MAX_PROMPT_TOKENS = 16000

# Rubric
RUBRIC_CRITERIA = ("Correctness", "Completeness", "Safety", "Conciseness", "Style")
OVERALL = "overall"
SCORE_RANGE = 4.0
TIE_SCORE = 3.0
LIKERT_MIN = 1.0
LIKERT_MAX = 5.0

# Input limits
MAX_INPUT_BYTES = 2 * 1024**3

# Robustness procedures
DEFAULT_IMPUTATIONS = 5
DEFAULT_BOOTSTRAP_ITERATIONS = 1000
DEFAULT_RATING_BOOTSTRAP_ITERATIONS = 100
DEFAULT_CONFIDENCE_LEVEL = 0.95
MAX_FAILED_BOOTSTRAP_FRACTION = 0.10

# Numerics
PINV_RCOND = 1e-10
SYMMETRY_ATOL = 1e-10
POLYNOMIAL_DEGREE = 2
MAX_AUTO_CLUSTERS = 8
CLR_THRESHOLD = 1.5
CLR_SLOPE = 2.0

# Bradley-Terry
BT_TOLERANCE = 1e-8
BT_MAX_ITER = 10000
BT_REGULARIZATION = 1e-6
STRONG_PREFERENCE_WEIGHT = 3.0
WEAK_PREFERENCE_WEIGHT = 1.0
ELO_SCALE = 400.0 / math.log(10.0)
ELO_OFFSET = 1000.0

# Canonical output
SIGNIFICANT_DIGITS = 6
