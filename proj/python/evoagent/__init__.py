"""Python access to the self-evolving agent engine.

Configs are plain dicts shaped like the YAML/JSON run config; results come
back as dicts.
"""

import json

from . import _core
from ._core import ConfigError, EvoError, cosine, encode

__all__ = [
    "ConfigError",
    "EvoError",
    "Session",
    "World",
    "apply_override",
    "cosine",
    "curriculum_run",
    "default_config",
    "encode",
    "eval_text",
    "make_config",
    "run_eval",
    "scripted_plan",
    "standard_suite",
]


def default_config():
    return json.loads(_core.default_config())


def apply_override(config, key, value):
    return json.loads(_core.apply_override(json.dumps(config), key, str(value)))


def make_config(base=None, **overrides):
    """Defaults (or `base`) with `key=value` overrides, validated."""
    cfg = dict(base) if base is not None else default_config()
    for key, value in overrides.items():
        if isinstance(value, (list, dict, bool)) or value is None:
            value = json.dumps(value)
        cfg = apply_override(cfg, key, value)
    return json.loads(_core.check_config(json.dumps(cfg)))


def standard_suite():
    return json.loads(_core.standard_suite())


def run_eval(config):
    return json.loads(_core.run_eval(json.dumps(config)))


def eval_text(config):
    return _core.run_eval_text(json.dumps(config))


def curriculum_run(config):
    return json.loads(_core.curriculum_run(json.dumps(config)))


def scripted_plan(goal, inventory=None):
    return json.loads(_core.scripted_plan(goal, json.dumps(inventory or {})))


class Session:
    """Planner, knowledge and experience store shared across episodes."""

    def __init__(self, config=None):
        self._s = _core.Session(json.dumps(config or default_config()))

    def run(self, task_id, seed):
        return json.loads(self._s.run(task_id, seed))

    def eval(self):
        return json.loads(self._s.eval())

    def knowledge(self):
        return json.loads(self._s.knowledge())

    @property
    def kb_version(self):
        return self._s.kb_version()

    @property
    def store_size(self):
        return self._s.store_size()

    def save_knowledge(self, path):
        self._s.save_knowledge(str(path))


class World:
    """The voxel environment, stepped with text actions."""

    def __init__(self):
        self._w = _core.World()

    def reset(self, seed, init_commands=()):
        return json.loads(self._w.reset(seed, list(init_commands)))

    def step(self, action):
        return json.loads(self._w.step(action))

    def snapshot(self):
        return json.loads(self._w.snapshot())

    def dump(self):
        return self._w.dump()

    def count(self, item):
        return self._w.count(item)

    @property
    def health(self):
        return self._w.health()

    @property
    def tick(self):
        return self._w.tick()

    @property
    def terminated(self):
        return self._w.terminated()

    @property
    def agent(self):
        return self._w.agent()
