# beliefnet - social learning on networks with rationally inattentive agents
__version__ = "0.1.0"
