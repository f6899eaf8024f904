from django.db import models

# No models needed - throughput results are computed on demand
