"""robustlab: adversarial contrastive learning and corruption robustness at desk scale."""

__version__ = "0.1.0"
