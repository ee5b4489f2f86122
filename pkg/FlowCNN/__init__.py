
__all__  = [ 
    "cli",
    "constants",
    "driver",
    "errors",
    "gradcheck",
    "history",
    "image_ops",
    "inference",
    "io",
    "loss",
    "metrics",
    "network",
    "synthetic",
    "tensor",
    "trainer",
    "utils",
]
