"""This file contains the domain records for the analyzer."""
