"""Engine for diagnosing and mitigating spurious concept-class associations.

The package operates on activation-vector bundles (instances plus image
segments), quantifies how user-defined concepts associate with classes,
measures how misclassifications are attributed to those concepts, and
removes unwanted concept directions from training activations by
orthogonal projection.
"""

__version__ = "0.1.0"
