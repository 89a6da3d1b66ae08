"""Exception types raised by the simulator and the algorithms built on it."""


class SimulationError(Exception):
    """Base class for every error raised by the round engine or a protocol."""


class MemoryExceeded(SimulationError):
    def __init__(self, node, round_index, words, mu):
        self.node = node
        self.round = round_index
        self.words = words
        self.mu = mu
        super().__init__(
            f"node {node} holds {words} words in round {round_index} (mu={mu})"
        )


class BandwidthViolation(SimulationError):
    def __init__(self, edge, round_index, reason="two words on one directed edge"):
        self.edge = edge
        self.round = round_index
        super().__init__(f"edge {edge} in round {round_index}: {reason}")


class WordTooLarge(SimulationError):
    """A payload does not fit into one O(log n)-bit word."""


class NonTermination(SimulationError):
    def __init__(self, rounds):
        self.rounds = rounds
        super().__init__(f"halt predicate not reached after {rounds} rounds")


class InsufficientMemory(SimulationError):
    """The memory budget is below what an algorithm's precondition requires."""


class InvalidSpec(ValueError):
    """A graph specification violates one of its constraints."""


class InvalidParams(ValueError):
    """Numeric parameters are outside the range an operation accepts."""


class ModelMismatch(SimulationError):
    """An algorithm was run on the wrong communication topology."""


class BatchTooLarge(SimulationError):
    """A routing batch sends more than mu words to a single target."""


class NotDoublyBalanced(ValueError):
    """Row and column sums of a transfer matrix disagree."""


class NotComposable(TypeError):
    """A summary type lacks the word-stream decomposition needed for composition."""


class PremiseViolated(ValueError):
    """The premise of a structural bound does not hold on the given input."""
