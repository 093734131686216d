import pytest

from lqkd.nettop import Layer, Network


@pytest.fixture
def demo_network():
    """Three participants, two nested layers, all reference dimensions 2."""
    return Network(
        names=("Alice", "Bob1", "Bob2"),
        hub=0,
        layers=(Layer(members=(0, 1)), Layer(members=(0, 1, 2))),
    )


@pytest.fixture
def scaled_network():
    """Same topology with a qutrit reference set in the first layer."""
    return Network(
        names=("Alice", "Bob1", "Bob2"),
        hub=0,
        layers=(Layer(members=(0, 1), ref_dim=3), Layer(members=(0, 1, 2), ref_dim=2)),
    )


@pytest.fixture
def pair_network():
    return Network(names=("Alice", "Bob"), hub=0, layers=(Layer(members=(0, 1)),))
