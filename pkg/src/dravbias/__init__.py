"""Gender-inflection bias auditing and CoT mitigation for English->Telugu/Kannada MT."""

__version__ = "0.1.0"
