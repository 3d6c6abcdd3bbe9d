"""Modal stability analysis of the abstract thermoelastic Timoshenko system."""
