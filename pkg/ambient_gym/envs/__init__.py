from .ambient_env import AmbientEnv, load_model
