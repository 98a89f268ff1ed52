from .policy import ActorCritic
from .ppo import PpoConfig, TrainResult, compute_gae, evaluate_rollouts, ppo_surrogate_term, train
