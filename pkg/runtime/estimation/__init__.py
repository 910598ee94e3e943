"""Maximum pseudo-likelihood estimation and the matched-budget recovery study."""
