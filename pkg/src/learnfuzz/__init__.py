"""Active learning of Mealy models for reactive programs, with fuzzing as a counterexample source."""
from learnfuzz._kernels import BACKEND
from learnfuzz.fsm import Alphabet, MealyMachine, equivalent, run

__all__ = ["Alphabet", "BACKEND", "MealyMachine", "equivalent", "run"]
__version__ = "0.1.0"
