"""Front end, transformation passes and resource estimation."""
