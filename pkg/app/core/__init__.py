"""Core algorithms, configuration and logging of the analyzer."""
