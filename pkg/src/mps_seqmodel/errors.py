"""Exception types shared across modules."""


class ContractViolation(ValueError):
    """A numerical precondition or postcondition does not hold."""


class ConvergenceError(ContractViolation):
    pass


class EmptyTrainingSetError(ContractViolation):
    pass


class EmptyModelError(ContractViolation):
    """Every eigenvalue of an effective density fell below the cutoff."""


class InfeasibleConstraintError(ContractViolation):
    """Sampling constraints select a set of zero probability."""


class DegenerateBlockError(ContractViolation):
    """A 2x2 parity block has zero gap and zero off-diagonal."""


class AmbiguousReconstructionError(ContractViolation):
    """Reduced densities with repeated eigenvalues cannot be glued uniquely."""


class MemoryGuardError(ContractViolation):
    """Oracle input exceeds the dense size limit."""
