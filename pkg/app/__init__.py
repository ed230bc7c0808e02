"""Configuration complexity analyzer."""
