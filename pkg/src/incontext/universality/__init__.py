"""Elementary in-context maps, their algebra, fitting and realization as transformers."""

from .algebra import AlgebraElement, eval_algebra, gamma_bar, lift_to_vector, lifted_value
from .elementary import ElementaryParams, elementary_batch, elementary_stack, gamma_elementary, laplace, laplace_k
from .fitting import CylindricalRegressor, FitConfig, MaskedCylindricalRegressor, SingularFitError, fit
from .product_mlp import ProductMlp, ProductMlpError, build_product_mlp
from .realize import RealizedTransformer, realize, required_radius, size_contract_violations

__all__ = [
    "AlgebraElement", "eval_algebra", "gamma_bar", "lift_to_vector", "lifted_value",
    "ElementaryParams", "elementary_batch", "elementary_stack", "gamma_elementary", "laplace", "laplace_k",
    "CylindricalRegressor", "FitConfig", "MaskedCylindricalRegressor", "SingularFitError", "fit",
    "ProductMlp", "ProductMlpError", "build_product_mlp",
    "RealizedTransformer", "realize", "required_radius", "size_contract_violations",
]
