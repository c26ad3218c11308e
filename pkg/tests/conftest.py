import hypothesis

hypothesis.settings.register_profile(
    "numerics",
    deadline=None,
    max_examples=25,
    derandomize=True,
)
hypothesis.settings.load_profile("numerics")
