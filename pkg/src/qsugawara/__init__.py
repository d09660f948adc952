"""q-deformed superconformal algebras from U_q(su(N+1)) current algebras: oscillators, fields, identity checks."""

__version__ = "0.1.0"
