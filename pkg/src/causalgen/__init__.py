"""causalgen: causally-aware, metric-guided text generation at desk scale.

Subsystems:
  autodiff     float64 reverse-mode tape, layers, Adam, checkpoints
  features     deterministic lexical/syntactic feature extraction + soft variant
  corpus       JSONL corpora, filtering, bucketing, TF-IDF keywords, LDA, splits
  synth        synthetic corpora with planted causal structure
  ate          doubly-robust average treatment effect estimation
  classifiers  hashed bag-of-ngrams and feature-vector feedback classifiers
  transformer  control-injected decoder-only transformer with feedback losses
  cvae         conditional VAE generator with the causal-graph extension
  evaluation   perplexity, control accuracy, ROUGE, feature distributions
  cli          the `cam` command-line entry point
"""

__version__ = "0.1.0"
