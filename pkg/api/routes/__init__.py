"""p4f-cfa API Routes"""

from . import analysis, corpus
