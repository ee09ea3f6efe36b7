import math


class ReturnScaler:
    """Divide recompensas pelo RMS corrente do retorno descontado de um UAV"""

    def __init__(self, gamma: float, clip: float = 10.0, eps: float = 1e-8):
        self.gamma = gamma
        self.clip = clip
        self.eps = eps
        self.count = 0
        self.square_mean = 0.0
        self.running = 0.0

    @property
    def scale(self) -> float:
        return math.sqrt(self.square_mean) if self.square_mean > self.eps else 1.0

    def __call__(self, reward: float, done: bool) -> float:
        self.running = self.gamma * self.running + reward
        self.count += 1
        self.square_mean += (self.running * self.running - self.square_mean) / self.count
        scaled = reward / self.scale
        if done:
            self.running = 0.0
        return max(-self.clip, min(self.clip, scaled))
