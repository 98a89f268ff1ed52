from .sigmoid import SigmoidEnv, sample_sigmoid_instances, oracle_best_episode_reward
from .cmaes import CmaesEnv, cmaes_train_instances, cmaes_test_instances


def make_env(benchmark: str, **kwargs):
    """Instantiate the environment for a benchmark name."""
    if benchmark == "sigmoid":
        return SigmoidEnv()
    if benchmark == "cmaes":
        return CmaesEnv(**kwargs)
    raise ValueError(f"unknown benchmark {benchmark!r}")
