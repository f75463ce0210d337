"""Random generators and hypothesis strategies shared by the tests."""

import numpy as np
from hypothesis import strategies as st

from gyrofree.geometry import InputVelocity, State, SymElement, random_rotation, random_vec3

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
vec3 = st.lists(finite, min_size=3, max_size=3).map(np.array)
seeds = st.integers(min_value=0, max_value=2**32 - 1)
rotations = seeds.map(lambda s: random_rotation(np.random.default_rng(s)))
elements = st.builds(SymElement, rotations, vec3)
states = st.builds(State, rotations, vec3)
inputs = st.builds(InputVelocity, vec3, vec3)


def rand_element(rng, scale=1.0):
    return SymElement(random_rotation(rng), random_vec3(rng, scale))


def rand_state(rng, scale=1.0):
    return State(random_rotation(rng), random_vec3(rng, scale))


def rand_input(rng, scale=1.0):
    return InputVelocity(random_vec3(rng, scale), random_vec3(rng, scale))
