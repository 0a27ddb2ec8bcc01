"""molfuse: desk-scale multimodal molecule toolkit.

Aligns molecular graph, image, and text modalities in one latent space via
a learnable-query fusion transformer, translates any modality to language,
and predicts properties — with the cheminformatics kernels and metrics
needed to verify every mechanism.
"""

__version__ = "0.1.0"
