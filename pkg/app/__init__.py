# deep_hankel_lab application package
