"""This file contains the services for the analyzer."""

from app.services.pipeline import PipelineService

__all__ = ["PipelineService"]
