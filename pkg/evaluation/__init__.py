"""
PETE - Evaluation Package
"""

from evaluation.metrics import cosine, pearson, spearman
from evaluation.sts import EvalReport, evaluate_sts
