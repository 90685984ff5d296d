"""Network, optimizer, logic-loss and federation primitives."""
