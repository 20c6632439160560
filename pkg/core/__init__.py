"""p4f-cfa Core Package"""

from .models import KontPolicy, PolicyPair, ValuePolicy
from .syntax import Program, parse_program
