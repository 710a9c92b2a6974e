from gym.envs.registration import register

register(
    id='BioAmbients-v0',
    entry_point='ambient_gym.envs:AmbientEnv',
    max_episode_steps=1024,
)

register(
    id='BioAmbients-blood-v0',
    entry_point='ambient_gym.envs:AmbientEnv',
    max_episode_steps=1024,
    kwargs=dict(model='blood'),
)

register(
    id='BioAmbients-phage-v0',
    entry_point='ambient_gym.envs:AmbientEnv',
    max_episode_steps=1024,
    kwargs=dict(model='phage'),
)
