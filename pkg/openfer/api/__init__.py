"""
FastAPI apps.

    uvicorn openfer.api.results_api:app --host <api.host> --port <api.port>
"""
